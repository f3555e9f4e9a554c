use std::io::{self, Write};

use nalgebra::DMatrix;

/// Block-diagonal symmetric matrix stored as upper-triangle triplets.
///
/// An entry `(block, i, j, v)` with `i ≤ j` stands for `v` at both `(i, j)`
/// and `(j, i)` of the given block. Repeated positions are summed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSym {
    entries: Vec<(usize, usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, block: usize, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((block, i, j, v));
    }

    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Trace inner product `⟨self, X⟩`.
    pub fn dot(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|&(b, i, j, v)| {
                if i == j {
                    v * x[b][(i, i)]
                } else {
                    v * (x[b][(i, j)] + x[b][(j, i)])
                }
            })
            .sum()
    }

    /// `out += scale · self`.
    pub fn add_to(&self, out: &mut [DMatrix<f64>], scale: f64) {
        for &(b, i, j, v) in &self.entries {
            out[b][(i, j)] += scale * v;
            if i != j {
                out[b][(j, i)] += scale * v;
            }
        }
    }

    pub fn to_dense(&self, blocks: &[usize]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        self.add_to(&mut out, 1.0);
        out
    }

    pub fn from_dense(m: &[DMatrix<f64>]) -> Self {
        let mut s = Self::new();
        for (b, blk) in m.iter().enumerate() {
            for i in 0..blk.nrows() {
                for j in i..blk.ncols() {
                    let v = 0.5 * (blk[(i, j)] + blk[(j, i)]);
                    if v != 0.0 {
                        s.push(b, i, j, v);
                    }
                }
            }
        }
        s
    }

    fn max_block(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.0).max()
    }
}

/// `min ⟨C, X⟩  s.t.  ⟨A_k, X⟩ = b_k,  X ⪰ 0` with block-diagonal `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    blocks: Vec<usize>,
    objective: SparseSym,
    constraints: Vec<SparseSym>,
    rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>) -> Self {
        assert!(blocks.iter().all(|&b| b > 0), "block sizes must be positive");
        Self {
            blocks,
            objective: SparseSym::new(),
            constraints: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn objective(&self) -> &SparseSym {
        &self.objective
    }

    pub fn constraints(&self) -> &[SparseSym] {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, c: SparseSym) {
        self.check_conforms(&c);
        self.objective = c;
    }

    pub fn add_constraint(&mut self, a: SparseSym, b: f64) {
        self.check_conforms(&a);
        self.constraints.push(a);
        self.rhs.push(b);
    }

    fn check_conforms(&self, m: &SparseSym) {
        if let Some(b) = m.max_block() {
            assert!(b < self.blocks.len(), "entry refers to block {b}");
        }
        for &(b, i, j, _) in m.entries() {
            assert!(
                i < self.blocks[b] && j < self.blocks[b],
                "entry ({i}, {j}) outside block {b} of size {}",
                self.blocks[b]
            );
        }
    }

    /// Total dimension `Σ n_b` (the barrier parameter).
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Writes the problem in SDPA sparse format.
    ///
    /// SDPA's dual form `max ⟨F₀, Y⟩ s.t. ⟨F_k, Y⟩ = c_k` matches this
    /// primal with `F₀ = −C`, `F_k = A_k`, `c = b`.
    pub fn write_listing<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.constraints.len())?;
        writeln!(w, "{}", self.blocks.len())?;
        let sizes: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        writeln!(w, "{}", sizes.join(" "))?;
        let rhs: Vec<String> = self.rhs.iter().map(|b| format!("{b:e}")).collect();
        writeln!(w, "{}", rhs.join(" "))?;
        for &(b, i, j, v) in self.objective.entries() {
            writeln!(w, "0 {} {} {} {:e}", b + 1, i + 1, j + 1, -v)?;
        }
        for (k, a) in self.constraints.iter().enumerate() {
            for &(b, i, j, v) in a.entries() {
                writeln!(w, "{} {} {} {} {:e}", k + 1, b + 1, i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}
