//! Open-boundary matrix product states and operators over the rows of a
//! column, with SVD compression.
//!
//! Site tensors are stored row-major: MPS `[s][left][right]`, MPO
//! `[s_out][s_in][left][right]`. Edge bond dimensions are 1.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct MpsSite {
    pub q: usize,
    pub left: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl MpsSite {
    pub fn zeros(q: usize, left: usize, right: usize) -> Self {
        MpsSite { q, left, right, data: vec![0.0; q * left * right] }
    }

    #[inline]
    pub fn at(&self, s: usize, a: usize, b: usize) -> f64 {
        self.data[(s * self.left + a) * self.right + b]
    }

    #[inline]
    pub fn at_mut(&mut self, s: usize, a: usize, b: usize) -> &mut f64 {
        &mut self.data[(s * self.left + a) * self.right + b]
    }

    /// Matrix with rows `(s, a)` and columns `b`.
    fn left_grouped(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.q * self.left, self.right, &self.data)
    }

    fn from_left_grouped(q: usize, left: usize, m: &DMatrix<f64>) -> Self {
        let right = m.ncols();
        let mut site = MpsSite::zeros(q, left, right);
        for s in 0..q {
            for a in 0..left {
                for b in 0..right {
                    *site.at_mut(s, a, b) = m[(s * left + a, b)];
                }
            }
        }
        site
    }

    /// Matrix with rows `a` and columns `(s, b)`.
    fn right_grouped(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.left, self.q * self.right, |a, col| self.at(col / self.right, a, col % self.right))
    }

    fn from_right_grouped(q: usize, right: usize, m: &DMatrix<f64>) -> Self {
        let left = m.nrows();
        let mut site = MpsSite::zeros(q, left, right);
        for s in 0..q {
            for a in 0..left {
                for b in 0..right {
                    *site.at_mut(s, a, b) = m[(a, s * right + b)];
                }
            }
        }
        site
    }

    /// Contract `m` (shape `right x new`) into the right bond.
    fn times_right(&self, m: &DMatrix<f64>) -> Self {
        let prod = self.left_grouped() * m;
        Self::from_left_grouped(self.q, self.left, &prod)
    }

    /// Contract `m` (shape `new x left`) into the left bond.
    fn times_left(&self, m: &DMatrix<f64>) -> Self {
        let prod = m * self.right_grouped();
        Self::from_right_grouped(self.q, self.right, &prod)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    pub sites: Vec<MpsSite>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpoSite {
    pub q: usize,
    pub left: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl MpoSite {
    pub fn zeros(q: usize, left: usize, right: usize) -> Self {
        MpoSite { q, left, right, data: vec![0.0; q * q * left * right] }
    }

    #[inline]
    pub fn at(&self, so: usize, si: usize, a: usize, b: usize) -> f64 {
        self.data[((so * self.q + si) * self.left + a) * self.right + b]
    }

    #[inline]
    pub fn at_mut(&mut self, so: usize, si: usize, a: usize, b: usize) -> &mut f64 {
        &mut self.data[((so * self.q + si) * self.left + a) * self.right + b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mpo {
    pub sites: Vec<MpoSite>,
}

/// Result of compressing an MPS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compression {
    /// Log of the norm before truncation.
    pub log_norm: f64,
    /// Sum of discarded squared singular values over all bonds, relative to the norm squared.
    pub discarded_weight: f64,
}

/// Singular values below this fraction of the largest are dropped as noise.
const SINGULAR_FLOOR: f64 = 1e-15;

impl Mps {
    /// Normalized uniform product state `prod_i (1/sqrt(q)) sum_s |s>`.
    pub fn uniform(q: usize, len: usize) -> Self {
        let v = 1.0 / (q as f64).sqrt();
        Mps { sites: (0..len).map(|_| MpsSite { q, left: 1, right: 1, data: vec![v; q] }).collect() }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.right).max().unwrap_or(1)
    }

    /// Amplitude `<config|psi>`.
    pub fn amplitude(&self, config: &[u8]) -> f64 {
        let mut env = vec![1.0];
        for (site, &s) in self.sites.iter().zip(config) {
            let mut next = vec![0.0; site.right];
            for (a, &e) in env.iter().enumerate() {
                if e == 0.0 {
                    continue;
                }
                let row = &site.data[(s as usize * site.left + a) * site.right..][..site.right];
                for (n, &x) in next.iter_mut().zip(row) {
                    *n += e * x;
                }
            }
            env = next;
        }
        env[0]
    }

    /// Visit every basis configuration with its amplitude, depth first.
    pub fn for_each_amplitude(&self, mut visit: impl FnMut(&[u8], f64)) {
        let mut config = vec![0u8; self.len()];
        let mut envs: Vec<Vec<f64>> = vec![vec![1.0]];
        self.dfs(0, &mut config, &mut envs, &mut visit);
    }

    fn dfs(&self, depth: usize, config: &mut [u8], envs: &mut Vec<Vec<f64>>, visit: &mut impl FnMut(&[u8], f64)) {
        if depth == self.len() {
            visit(config, envs[depth][0]);
            return;
        }
        let site = &self.sites[depth];
        for s in 0..site.q {
            let env = &envs[depth];
            let mut next = vec![0.0; site.right];
            for (a, &e) in env.iter().enumerate() {
                let row = &site.data[(s * site.left + a) * site.right..][..site.right];
                for (n, &x) in next.iter_mut().zip(row) {
                    *n += e * x;
                }
            }
            envs.truncate(depth + 1);
            envs.push(next);
            config[depth] = s as u8;
            self.dfs(depth + 1, config, envs, visit);
        }
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Mps) -> f64 {
        let mut env = DMatrix::from_element(1, 1, 1.0);
        for (x, y) in self.sites.iter().zip(&other.sites) {
            let mut next = DMatrix::zeros(x.right, y.right);
            for s in 0..x.q {
                let xm = DMatrix::from_row_slice(x.left, x.right, &x.data[s * x.left * x.right..][..x.left * x.right]);
                let ym = DMatrix::from_row_slice(y.left, y.right, &y.data[s * y.left * y.right..][..y.left * y.right]);
                next += xm.transpose() * &env * ym;
            }
            env = next;
        }
        env[(0, 0)]
    }

    /// `O|psi>` without truncation.
    pub fn apply(&self, mpo: &Mpo) -> Mps {
        let sites = self
            .sites
            .iter()
            .zip(&mpo.sites)
            .map(|(a, w)| {
                let (left, right) = (a.left * w.left, a.right * w.right);
                let mut out = MpsSite::zeros(a.q, left, right);
                for so in 0..a.q {
                    for si in 0..a.q {
                        for x in 0..w.left {
                            for y in 0..w.right {
                                let wv = w.at(so, si, x, y);
                                if wv == 0.0 {
                                    continue;
                                }
                                for l in 0..a.left {
                                    for r in 0..a.right {
                                        *out.at_mut(so, l * w.left + x, r * w.right + y) += wv * a.at(si, l, r);
                                    }
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Mps { sites }
    }

    /// Right-canonicalize, then truncate each bond to `max_bond` singular
    /// values sweeping left to right. The state ends left-canonical and
    /// normalized.
    pub fn compress(&mut self, max_bond: usize) -> Compression {
        let n = self.len();
        for i in (1..n).rev() {
            let m = self.sites[i].right_grouped();
            let qr = m.transpose().qr();
            let (q_mat, r_mat) = (qr.q(), qr.r());
            self.sites[i] = MpsSite::from_right_grouped(self.sites[i].q, self.sites[i].right, &q_mat.transpose());
            self.sites[i - 1] = self.sites[i - 1].times_right(&r_mat.transpose());
        }
        let norm = self.sites[0].data.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Compression { log_norm: f64::NEG_INFINITY, discarded_weight: 0.0 };
        }
        for x in &mut self.sites[0].data {
            *x /= norm;
        }
        let mut discarded = 0.0;
        for i in 0..n.saturating_sub(1) {
            let m = self.sites[i].left_grouped();
            let svd = m.svd(true, true);
            let (u, vt) = (svd.u.expect("left vectors"), svd.v_t.expect("right vectors"));
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let smax = svd.singular_values[order[0]];
            let keep: Vec<usize> = order
                .iter()
                .copied()
                .take(max_bond)
                .filter(|&j| svd.singular_values[j] > SINGULAR_FLOOR * smax)
                .collect();
            let keep = if keep.is_empty() { vec![order[0]] } else { keep };
            discarded += order.iter().skip(keep.len()).map(|&j| svd.singular_values[j].powi(2)).sum::<f64>();
            let u_keep = DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
            let sv = DMatrix::from_fn(keep.len(), vt.ncols(), |r, c| svd.singular_values[keep[r]] * vt[(keep[r], c)]);
            self.sites[i] = MpsSite::from_left_grouped(self.sites[i].q, self.sites[i].left, &u_keep);
            self.sites[i + 1] = self.sites[i + 1].times_left(&sv);
        }
        let last = n - 1;
        let tail = self.sites[last].data.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut self.sites[last].data {
            *x /= tail;
        }
        Compression { log_norm: norm.ln(), discarded_weight: discarded }
    }

    /// `<self| O |self>` through left environments.
    pub fn expectation(&self, mpo: &Mpo) -> f64 {
        let envs = self.left_environments(mpo);
        envs[self.len()][0]
    }

    /// `env[i]` is the contraction of sites `0..i`, indexed `[(a, w, b)]`.
    pub fn left_environments(&self, mpo: &Mpo) -> Vec<Vec<f64>> {
        let mut envs = vec![vec![1.0]];
        for (a, w) in self.sites.iter().zip(&mpo.sites) {
            let prev = envs.last().unwrap();
            envs.push(contract_left(prev, a, w));
        }
        envs
    }

    /// `env[i]` is the contraction of sites `i..n`, indexed `[(a, w, b)]`.
    pub fn right_environments(&self, mpo: &Mpo) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut envs = vec![Vec::new(); n + 1];
        envs[n] = vec![1.0];
        for i in (0..n).rev() {
            envs[i] = contract_right(&envs[i + 1], &self.sites[i], &mpo.sites[i]);
        }
        envs
    }
}

/// Extend a left environment `[(a, w, b)]` by one site of bra/ket `a` and operator `w`.
pub fn contract_left(prev: &[f64], a: &MpsSite, w: &MpoSite) -> Vec<f64> {
    let (la, lw) = (a.left, w.left);
    let (ra, rw) = (a.right, w.right);
    // tmp[(a, w, s_in, b')] = sum_b prev[(a, w, b)] A[s_in][b][b']
    let mut tmp = vec![0.0; la * lw * a.q * ra];
    for x in 0..la {
        for y in 0..lw {
            for b in 0..la {
                let e = prev[(x * lw + y) * la + b];
                if e == 0.0 {
                    continue;
                }
                for si in 0..a.q {
                    let row = &a.data[(si * la + b) * ra..][..ra];
                    let dst = &mut tmp[((x * lw + y) * a.q + si) * ra..][..ra];
                    for (d, &v) in dst.iter_mut().zip(row) {
                        *d += e * v;
                    }
                }
            }
        }
    }
    // tmp2[(a, s_out, w', b')] = sum_{w, s_in} tmp[(a, w, s_in, b')] W[s_out][s_in][w][w']
    let mut tmp2 = vec![0.0; la * a.q * rw * ra];
    for x in 0..la {
        for y in 0..lw {
            for si in 0..a.q {
                let src = &tmp[((x * lw + y) * a.q + si) * ra..][..ra];
                for so in 0..a.q {
                    for z in 0..rw {
                        let wv = w.at(so, si, y, z);
                        if wv == 0.0 {
                            continue;
                        }
                        let dst = &mut tmp2[((x * a.q + so) * rw + z) * ra..][..ra];
                        for (d, &v) in dst.iter_mut().zip(src) {
                            *d += wv * v;
                        }
                    }
                }
            }
        }
    }
    // out[(a', w', b')] = sum_{a, s_out} A[s_out][a][a'] tmp2[(a, s_out, w', b')]
    let mut out = vec![0.0; ra * rw * ra];
    for x in 0..la {
        for so in 0..a.q {
            let arow = &a.data[(so * la + x) * ra..][..ra];
            let src = &tmp2[(x * a.q + so) * rw * ra..][..rw * ra];
            for (xp, &av) in arow.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let dst = &mut out[xp * rw * ra..][..rw * ra];
                for (d, &v) in dst.iter_mut().zip(src) {
                    *d += av * v;
                }
            }
        }
    }
    out
}

/// Extend a right environment `[(a, w, b)]` by one site to its left.
pub fn contract_right(next: &[f64], a: &MpsSite, w: &MpoSite) -> Vec<f64> {
    let (la, lw, ra, rw) = (a.left, w.left, a.right, w.right);
    let mut out = vec![0.0; la * lw * la];
    // tmp[(s_in, b, a', w')] = sum_{b'} A[s_in][b][b'] next[(a', w', b')]
    let mut tmp = vec![0.0; a.q * la * ra * rw];
    for si in 0..a.q {
        for b in 0..la {
            let arow = &a.data[(si * la + b) * ra..][..ra];
            for xp in 0..ra {
                for z in 0..rw {
                    let nrow = &next[(xp * rw + z) * ra..][..ra];
                    tmp[((si * la + b) * ra + xp) * rw + z] = arow.iter().zip(nrow).map(|(p, q)| p * q).sum();
                }
            }
        }
    }
    for so in 0..a.q {
        for si in 0..a.q {
            for y in 0..lw {
                for z in 0..rw {
                    let wv = w.at(so, si, y, z);
                    if wv == 0.0 {
                        continue;
                    }
                    for x in 0..la {
                        let arow = &a.data[(so * la + x) * ra..][..ra];
                        for b in 0..la {
                            let mut acc = 0.0;
                            for (xp, &av) in arow.iter().enumerate() {
                                acc += av * tmp[((si * la + b) * ra + xp) * rw + z];
                            }
                            out[(x * lw + y) * la + b] += wv * acc;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `<psi| O_i |psi>` for the MPO with site `i` replaced, using cached environments.
pub fn local_expectation(left: &[f64], right: &[f64], a: &MpsSite, w: &MpoSite) -> f64 {
    let ext = contract_left(left, a, w);
    ext.iter().zip(right).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mps(rng: &mut ChaCha8Rng, q: usize, len: usize, bond: usize) -> Mps {
        let sites = (0..len)
            .map(|i| {
                let left = if i == 0 { 1 } else { bond };
                let right = if i + 1 == len { 1 } else { bond };
                let mut s = MpsSite::zeros(q, left, right);
                for x in &mut s.data {
                    *x = rng.random_range(-1.0..1.0);
                }
                s
            })
            .collect();
        Mps { sites }
    }

    fn dense(mps: &Mps) -> Vec<f64> {
        let mut out = Vec::new();
        mps.for_each_amplitude(|_, a| out.push(a));
        out
    }

    #[test]
    fn lossless_compression_preserves_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mps = random_mps(&mut rng, 2, 6, 3);
        let before = dense(&mps);
        let norm = before.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut c = mps.clone();
        let info = c.compress(64);
        assert!((info.log_norm - norm.ln()).abs() < 1e-12);
        assert!(info.discarded_weight < 1e-20);
        for (x, y) in dense(&c).iter().zip(&before) {
            assert!((x - y / norm).abs() < 1e-12);
        }
        assert!((c.overlap(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_reports_discarded_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut mps = random_mps(&mut rng, 2, 8, 6);
        let exact = {
            let mut m = mps.clone();
            m.compress(1000);
            m
        };
        let info = mps.compress(2);
        let fidelity = mps.overlap(&exact).powi(2);
        assert!(info.discarded_weight > 0.0);
        assert!(1.0 - fidelity <= 1.5 * info.discarded_weight + 1e-12);
        assert!(mps.max_bond() <= 2);
    }

    #[test]
    fn amplitude_enumeration_and_overlap_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_mps(&mut rng, 3, 4, 2);
        let b = random_mps(&mut rng, 3, 4, 3);
        let (da, db) = (dense(&a), dense(&b));
        let direct: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
        assert!((a.overlap(&b) - direct).abs() < 1e-12);
        let mut cfg_count = 0;
        a.for_each_amplitude(|cfg, amp| {
            assert!((a.amplitude(cfg) - amp).abs() < 1e-14);
            cfg_count += 1;
        });
        assert_eq!(cfg_count, 81);
    }

    #[test]
    fn mpo_application_and_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_mps(&mut rng, 2, 4, 2);
        let sites = (0..4)
            .map(|i| {
                let left = if i == 0 { 1 } else { 2 };
                let right = if i == 3 { 1 } else { 2 };
                let mut w = MpoSite::zeros(2, left, right);
                for x in &mut w.data {
                    *x = rng.random_range(-1.0..1.0);
                }
                w
            })
            .collect();
        let mpo = Mpo { sites };
        let applied = psi.apply(&mpo);
        let direct = psi.overlap(&applied);
        assert!((psi.expectation(&mpo) - direct).abs() < 1e-12);
        let right = psi.right_environments(&mpo);
        let left = psi.left_environments(&mpo);
        for i in 0..4 {
            let v = local_expectation(&left[i], &right[i + 1], &psi.sites[i], &mpo.sites[i]);
            assert!((v - direct).abs() < 1e-12);
        }
        assert!((right[0][0] - direct).abs() < 1e-12);
    }
}
