//! Fermionic operators as sums of monomials in `c = (a_0..a_{n-1}, a_0^+..a_{n-1}^+)`.

/// `coefficient * c_{i_1} c_{i_2} ...` with indices into `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coefficient: f64,
    pub ops: Vec<usize>,
}

/// Sum of monomials acting on `modes` fermionic modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub modes: usize,
    pub terms: Vec<Monomial>,
}

pub fn annihilator(modes: usize, k: usize) -> usize {
    debug_assert!(k < modes);
    k
}

pub fn creator(modes: usize, k: usize) -> usize {
    debug_assert!(k < modes);
    k + modes
}

fn dagger_index(modes: usize, i: usize) -> usize {
    if i < modes {
        i + modes
    } else {
        i - modes
    }
}

impl Operator {
    pub fn identity(modes: usize) -> Self {
        Operator { modes, terms: vec![Monomial { coefficient: 1.0, ops: Vec::new() }] }
    }

    pub fn dagger(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|m| Monomial {
                coefficient: m.coefficient,
                ops: m.ops.iter().rev().map(|&i| dagger_index(self.modes, i)).collect(),
            })
            .collect();
        Operator { modes: self.modes, terms }
    }

    /// `1 + a_k^+ a_l^+ + a_l a_k + a_l^+ a_k + a_k^+ a_l`: the all-ones map
    /// inside each parity sector of modes `k` and `l`.
    pub fn entangle(modes: usize, k: usize, l: usize) -> Self {
        let (a, ad) = (|i| annihilator(modes, i), |i| creator(modes, i));
        let m = |ops: Vec<usize>| Monomial { coefficient: 1.0, ops };
        Operator {
            modes,
            terms: vec![
                m(vec![]),
                m(vec![ad(k), ad(l)]),
                m(vec![a(l), a(k)]),
                m(vec![ad(l), a(k)]),
                m(vec![ad(k), a(l)]),
            ],
        }
    }

    /// `diag(1, t)` on mode `k`, i.e. `1 + (t - 1) a_k^+ a_k`.
    pub fn occupation_weight(modes: usize, k: usize, t: f64) -> Self {
        Operator {
            modes,
            terms: vec![
                Monomial { coefficient: 1.0, ops: vec![] },
                Monomial { coefficient: t - 1.0, ops: vec![creator(modes, k), annihilator(modes, k)] },
            ],
        }
    }
}
