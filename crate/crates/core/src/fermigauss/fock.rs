//! Dense Fock-space reference for small mode counts (Jordan-Wigner with
//! mode 0 first, bit `k` of the basis index is the occupation of mode `k`).

use super::ops::Operator;

#[derive(Debug, Clone)]
pub struct FockState {
    pub modes: usize,
    pub amplitudes: Vec<f64>,
}

pub const MAX_DENSE_MODES: usize = 16;

impl FockState {
    pub fn vacuum(modes: usize) -> Self {
        assert!(modes <= MAX_DENSE_MODES, "dense Fock space limited to {MAX_DENSE_MODES} modes");
        let mut amplitudes = vec![0.0; 1 << modes];
        amplitudes[0] = 1.0;
        FockState { modes, amplitudes }
    }

    /// Apply one elementary operator `c_i` to a basis state.
    fn elementary(&self, i: usize, basis: usize) -> Option<(usize, f64)> {
        let (k, create) = if i < self.modes { (i, false) } else { (i - self.modes, true) };
        let occupied = basis >> k & 1 == 1;
        if occupied == create {
            return None;
        }
        let below = (basis & ((1 << k) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
        Some((basis ^ (1 << k), sign))
    }

    pub fn apply(&self, op: &Operator) -> FockState {
        let mut out = vec![0.0; self.amplitudes.len()];
        for (basis, &amp) in self.amplitudes.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            for term in &op.terms {
                let mut state = basis;
                let mut coef = term.coefficient * amp;
                let mut alive = true;
                for &i in term.ops.iter().rev() {
                    match self.elementary(i, state) {
                        Some((s, sg)) => {
                            state = s;
                            coef *= sg;
                        }
                        None => {
                            alive = false;
                            break;
                        }
                    }
                }
                if alive {
                    out[state] += coef;
                }
            }
        }
        FockState { modes: self.modes, amplitudes: out }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `<psi| c_i c_j |psi> / <psi|psi>`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let op =
            Operator { modes: self.modes, terms: vec![super::ops::Monomial { coefficient: 1.0, ops: vec![i, j] }] };
        let moved = self.apply(&op);
        let dot: f64 = self.amplitudes.iter().zip(&moved.amplitudes).map(|(a, b)| a * b).sum();
        dot / self.norm().powi(2)
    }
}
