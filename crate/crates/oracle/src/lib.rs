//! Brute-force dense-matrix reference implementations used only in tests.
//!
//! Everything here is deliberately independent of the production code paths:
//! operators are materialized as explicit dense matrices over a truncated
//! site window and evolved by plain matrix products, and singular values come
//! from a hand-rolled Jacobi eigensolver instead of any closed-form shortcut.

use num_complex::Complex64 as C64;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn matmul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.at(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Conjugate transpose times self: A† A (square, Hermitian, cols x cols).
    pub fn gram(&self) -> DenseMat {
        let mut out = DenseMat::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in 0..self.cols {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..self.rows {
                    acc += self.at(k, i).conj() * self.at(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Index of the coin-resolved basis vector |m, coin> inside a window
/// [lo, hi]: coin 0 = L, coin 1 = R.
pub fn basis_index(lo: i64, m: i64, coin: usize) -> usize {
    debug_assert!(m >= lo);
    2 * (m - lo) as usize + coin
}

/// Dense coin rotation on the window [lo, hi]: block-diagonal copies of
/// (1/sqrt2) [[1, i], [i, 1]].
pub fn coin_dense(lo: i64, hi: i64) -> DenseMat {
    let n = (hi - lo + 1) as usize;
    let dim = 2 * n;
    let mut out = DenseMat::zeros(dim, dim);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let d = C64::new(r, 0.0);
    let o = C64::new(0.0, r);
    for s in 0..n {
        out.set(2 * s, 2 * s, d);
        out.set(2 * s, 2 * s + 1, o);
        out.set(2 * s + 1, 2 * s, o);
        out.set(2 * s + 1, 2 * s + 1, d);
    }
    out
}

/// Dense dichroic displacement on the window [lo, hi], truncating any
/// amplitude pushed past the boundary. Columns follow
/// |m,L> -> e^{-eta'/2} (c |m,L> + i s |m+1,R>),
/// |m,R> -> e^{-eta'/2} (c |m,R> + i s |m-1,L>), with c = cos(zeta/2),
/// s = sin(zeta/2), zeta = delta + i eta.
pub fn displacement_dense(lo: i64, hi: i64, delta: f64, eta: f64, eta_prime: f64) -> DenseMat {
    let n = (hi - lo + 1) as usize;
    let dim = 2 * n;
    let mut out = DenseMat::zeros(dim, dim);
    let half = C64::new(delta, eta) * 0.5;
    let damp = (-eta_prime / 2.0).exp();
    let c = half.cos() * damp;
    let is = C64::new(0.0, 1.0) * half.sin() * damp;
    for m in lo..=hi {
        let col_l = basis_index(lo, m, 0);
        out.add_at(col_l, col_l, c);
        if m + 1 <= hi {
            out.add_at(basis_index(lo, m + 1, 1), col_l, is);
        }
        let col_r = basis_index(lo, m, 1);
        out.add_at(col_r, col_r, c);
        if m - 1 >= lo {
            out.add_at(basis_index(lo, m - 1, 0), col_r, is);
        }
    }
    out
}

/// One walk step as an explicit matrix product: displacement after coin.
pub fn step_dense(lo: i64, hi: i64, delta: f64, eta: f64, eta_prime: f64) -> DenseMat {
    displacement_dense(lo, hi, delta, eta, eta_prime).matmul(&coin_dense(lo, hi))
}

/// Evolve a coin-resolved amplitude vector through per-step dichroism values
/// by repeated dense matrix-vector products. Returns one snapshot per step,
/// including the input.
pub fn evolve_dense(
    lo: i64,
    hi: i64,
    initial: &[C64],
    delta: f64,
    etas: &[f64],
    eta_primes: &[f64],
) -> Vec<Vec<C64>> {
    assert_eq!(etas.len(), eta_primes.len());
    let mut snaps = vec![initial.to_vec()];
    let mut cur = initial.to_vec();
    for (&eta, &etap) in etas.iter().zip(eta_primes) {
        let u = step_dense(lo, hi, delta, eta, etap);
        cur = u.matvec(&cur);
        snaps.push(cur.clone());
    }
    snaps
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// sorted descending. Input is read as exactly Hermitian (the strict lower
/// triangle is ignored).
pub fn hermitian_eigenvalues(a: &DenseMat) -> Vec<f64> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    // symmetrize defensively against rounding in the caller's product
    for i in 0..n {
        let d = m.at(i, i);
        m.set(i, i, C64::new(d.re, 0.0));
        for j in (i + 1)..n {
            let v = m.at(i, j);
            m.set(j, i, v.conj());
        }
    }
    let scale: f64 = (0..n)
        .map(|i| (0..n).map(|j| m.at(i, j).norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.at(i, j).norm_sqr();
            }
        }
        if off.sqrt() < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.at(p, q);
                let u = apq.norm();
                if u < 1e-300 {
                    continue;
                }
                let phase = apq / u; // e^{i phi}
                let app = m.at(p, p).re;
                let aqq = m.at(q, q).re;
                let tau = (app - aqq) / (2.0 * u);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // right-multiply by G: G[p][p]=c, G[p][q]=-s*phase,
                // G[q][p]=s*conj(phase), G[q][q]=c
                for i in 0..n {
                    let aip = m.at(i, p);
                    let aiq = m.at(i, q);
                    m.set(i, p, aip * c + aiq * s * phase.conj());
                    m.set(i, q, aiq * c - aip * s * phase);
                }
                // left-multiply by G†
                for j in 0..n {
                    let apj = m.at(p, j);
                    let aqj = m.at(q, j);
                    m.set(p, j, apj * c + aqj * s * phase);
                    m.set(q, j, aqj * c - apj * s * phase.conj());
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m.at(i, i).re).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigs
}

/// Largest singular value of a (possibly rectangular) dense matrix, via
/// Jacobi diagonalization of A† A.
pub fn max_singular_value(a: &DenseMat) -> f64 {
    let gram = a.gram();
    let eigs = hermitian_eigenvalues(&gram);
    eigs[0].max(0.0).sqrt()
}
