//! Quasi-momentum (Bloch) picture of the translation-invariant step
//! operator: 2x2 symbols, complex quasi-energy bands, eigenvector geometry,
//! and an FFT-backed momentum-space evolution route.
//!
//! Conventions, fixed once: |q> = sum_m e^{-iqm} |m> / sqrt(2 pi), so the
//! left shift t (t|m> = |m-1>) becomes multiplication by e^{-iq}. Energies
//! solve cos E = tr U(q) / 2 on the attenuation-stripped symbol, with Im E
//! tied to the larger-modulus eigenvalue through e^{-iE} = lambda.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::walk::{PlateKind, PlateParams, Protocol, WalkState};

/// Eigenvalue gaps below this are classified as exceptional: the
/// eigensolver cannot certify coalescence any tighter.
pub const EXCEPTIONAL_GAP: f64 = 1e-9;

/// Dense 2x2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub e: [[C64; 2]; 2],
}

/// Eigenpairs of a 2x2 matrix, ordered by descending eigenvalue modulus;
/// exact-modulus ties put the eigenvalue with nonpositive imaginary part
/// first. Eigenvectors are unit-normalized columns.
#[derive(Clone, Copy, Debug)]
pub struct Eigen2 {
    pub values: [C64; 2],
    pub vectors: [[C64; 2]; 2],
}

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { e: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mat2::new(one, zero, zero, one)
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.e[i][0] * rhs.e[0][j] + self.e[i][1] * rhs.e[1][j];
            }
        }
        Mat2 { e: out }
    }

    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.e[0][0] * v[0] + self.e[0][1] * v[1],
            self.e[1][0] * v[0] + self.e[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        let mut out = *self;
        for row in out.e.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1]
    }

    pub fn det(&self) -> C64 {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    /// Singular values in descending order, from the closed-form
    /// eigenvalues of the 2x2 Gram matrix.
    pub fn singular_values(&self) -> [f64; 2] {
        let m = &self.e;
        let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let r = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let w = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        let mean = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + w.norm_sqr()).sqrt();
        let hi = (mean + rad).max(0.0).sqrt();
        let lo = (mean - rad).max(0.0).sqrt();
        [hi, lo]
    }

    /// Closed-form eigendecomposition via the quadratic formula.
    pub fn eigen(&self) -> Eigen2 {
        let half_tr = self.trace() * 0.5;
        let disc = (half_tr * half_tr - self.det()).sqrt();
        let mut l1 = half_tr + disc;
        let mut l2 = half_tr - disc;
        let scale = l1.norm().max(l2.norm()).max(1e-300);
        let tied = (l1.norm() - l2.norm()).abs() <= 1e-12 * scale;
        let swap = if tied {
            // modulus tie: put the nonpositive-imaginary branch first
            l1.im > l2.im
        } else {
            l1.norm() < l2.norm()
        };
        if swap {
            std::mem::swap(&mut l1, &mut l2);
        }
        Eigen2 {
            values: [l1, l2],
            vectors: [self.eigenvector_for(l1), self.eigenvector_for(l2)],
        }
    }

    fn eigenvector_for(&self, lambda: C64) -> [C64; 2] {
        let m = &self.e;
        // (M - lambda) v = 0: rows give two candidate null vectors
        let c1 = [m[0][1], lambda - m[0][0]];
        let c2 = [lambda - m[1][1], m[1][0]];
        let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
        let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
        let scale = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().max(1.0);
        if n1.max(n2) <= 1e-28 * scale {
            // scalar (or fully defective numerical) case
            return [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        }
        let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
        let inv = 1.0 / n.sqrt();
        [v[0] * inv, v[1] * inv]
    }
}

/// The fixed coin rotation (1/sqrt2) [[1, i], [i, 1]].
pub fn coin_matrix() -> Mat2 {
    let d = C64::new(FRAC_1_SQRT_2, 0.0);
    let o = C64::new(0.0, FRAC_1_SQRT_2);
    Mat2::new(d, o, o, d)
}

/// Momentum-space symbol of the dichroic displacement at quasi-momentum q,
/// with t replaced by e^{-iq}:
/// e^{-eta'/2} [[cos(zeta/2), i sin(zeta/2) e^{-iq}],
///              [i sin(zeta/2) e^{+iq}, cos(zeta/2)]].
pub fn displacement_symbol(delta: f64, eta: f64, eta_prime: f64, q: f64) -> Mat2 {
    let half = C64::new(delta, eta) * 0.5;
    let damp = C64::new((-eta_prime / 2.0).exp(), 0.0);
    let c = half.cos() * damp;
    let is = C64::new(0.0, 1.0) * half.sin() * damp;
    let shift = C64::new(0.0, -q).exp();
    Mat2::new(c, is * shift, is * shift.conj(), c)
}

/// Momentum-space symbol of one plate.
pub fn plate_symbol(plate: &PlateParams, q: f64) -> Mat2 {
    match plate.kind() {
        PlateKind::CoinRotation => coin_matrix(),
        PlateKind::Displacement => {
            displacement_symbol(plate.delta(), plate.eta(), plate.eta_prime(), q)
        }
    }
}

/// One sampled point of the step symbol.
#[derive(Clone, Copy, Debug)]
pub struct BlochOperator {
    pub q: f64,
    pub matrix: Mat2,
}

/// Step symbol U(q) = T(q) W at quasi-momentum q, including the global
/// attenuation prefactor.
pub fn bloch_symbol(delta: f64, eta: f64, eta_prime: f64, q: f64) -> BlochOperator {
    let matrix = displacement_symbol(delta, eta, eta_prime, q).mul(&coin_matrix());
    BlochOperator { q, matrix }
}

/// Sampled spectrum of the step symbol over a quasi-momentum grid.
/// Parallel arrays, one entry per grid point.
#[derive(Clone, Debug)]
pub struct BlochSpectrum {
    pub q_grid: Vec<f64>,
    /// Quasi-energy pair (+E, -E) of the attenuation-stripped symbol.
    pub energies: Vec<[C64; 2]>,
    /// Eigenvalues of the full symbol, larger modulus first.
    pub eigenvalues: Vec<[C64; 2]>,
    /// |lambda_+ - lambda_-| of the full symbol.
    pub gap: Vec<f64>,
    /// |<v_+|v_->| of the unit eigenvectors; 1 marks coalescence.
    pub eigenvector_overlap: Vec<f64>,
    /// True where the gap is below [`EXCEPTIONAL_GAP`].
    pub exceptional: Vec<bool>,
}

impl BlochSpectrum {
    pub fn len(&self) -> usize {
        self.q_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_grid.is_empty()
    }
}

struct SpectrumPoint {
    energy: C64,
    eigenvalues: [C64; 2],
    gap: f64,
    overlap: f64,
    exceptional: bool,
}

/// Spectrum of one symbol. `bare` must be the eta'-stripped symbol; the
/// attenuation prefactor e^{-eta'/2} only rescales the reported
/// eigenvalues and gap.
fn spectrum_point(bare: &Mat2, eta_prime: f64) -> SpectrumPoint {
    let eig = bare.eigen();
    let damp = (-eta_prime / 2.0).exp();
    let gap = (eig.values[0] - eig.values[1]).norm() * damp;
    let exceptional = gap < EXCEPTIONAL_GAP;
    let overlap = if exceptional {
        1.0
    } else {
        let v = eig.vectors;
        (v[0][0].conj() * v[1][0] + v[0][1].conj() * v[1][1]).norm().min(1.0)
    };
    // e^{-iE} = larger-modulus bare eigenvalue, so E = i ln(lambda)
    let energy = C64::new(0.0, 1.0) * eig.values[0].ln();
    SpectrumPoint {
        energy,
        eigenvalues: [eig.values[0] * damp, eig.values[1] * damp],
        gap,
        overlap,
        exceptional,
    }
}

/// Complex quasi-energies, eigenvalue gaps and eigenvector overlaps of the
/// step symbol over the given quasi-momentum grid.
pub fn quasi_energies(
    delta: f64,
    eta: f64,
    eta_prime: f64,
    q_grid: &[f64],
) -> Result<BlochSpectrum> {
    if q_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = q_grid.len();
    let mut spectrum = BlochSpectrum {
        q_grid: q_grid.to_vec(),
        energies: Vec::with_capacity(n),
        eigenvalues: Vec::with_capacity(n),
        gap: Vec::with_capacity(n),
        eigenvector_overlap: Vec::with_capacity(n),
        exceptional: Vec::with_capacity(n),
    };
    for &q in q_grid {
        let bare = bloch_symbol(delta, eta, 0.0, q).matrix;
        let point = spectrum_point(&bare, eta_prime);
        spectrum.energies.push([point.energy, -point.energy]);
        spectrum.eigenvalues.push(point.eigenvalues);
        spectrum.gap.push(point.gap);
        spectrum.eigenvector_overlap.push(point.overlap);
        spectrum.exceptional.push(point.exceptional);
    }
    Ok(spectrum)
}

/// Uniform half-open grid of `n` quasi-momenta covering [-pi, pi).
pub fn momentum_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect()
}

/// Evolve through the whole protocol in momentum space: forward DFT per
/// coin channel, per-sample product of plate symbols, inverse DFT. The
/// result window matches the real-space route exactly; `q_samples` must be
/// at least twice the final support width plus one or the circular
/// transform would alias.
pub fn evolve_bloch(
    state: &WalkState,
    protocol: &Protocol,
    q_samples: usize,
) -> Result<WalkState> {
    let growth = protocol.displacement_count();
    let final_width = state.len() + 2 * growth;
    let required = 2 * final_width + 1;
    if q_samples < required {
        return Err(Error::AliasedGrid { required, got: q_samples });
    }
    let n = q_samples;
    let mut chan_l = vec![C64::new(0.0, 0.0); n];
    let mut chan_r = vec![C64::new(0.0, 0.0); n];
    for (i, a) in state.amplitudes().iter().enumerate() {
        chan_l[growth + i] = a[0];
        chan_r[growth + i] = a[1];
    }

    let mut planner = FftPlanner::new();
    // forward lattice transform sum_n a_n e^{+2 pi i k n / N} is the
    // unscaled inverse FFT; the shift symbol then reads e^{-i q_k}
    let fwd = planner.plan_fft_inverse(n);
    fwd.process(&mut chan_l);
    fwd.process(&mut chan_r);

    for k in 0..n {
        let q = 2.0 * PI * k as f64 / n as f64;
        let mut v = [chan_l[k], chan_r[k]];
        for plate in protocol.plates() {
            v = plate_symbol(plate, q).mul_vec(v);
        }
        chan_l[k] = v[0];
        chan_r[k] = v[1];
    }

    let inv = planner.plan_fft_forward(n);
    inv.process(&mut chan_l);
    inv.process(&mut chan_r);
    let scale = 1.0 / n as f64;
    let amps: Vec<[C64; 2]> = (0..final_width)
        .map(|j| [chan_l[j] * scale, chan_r[j] * scale])
        .collect();
    Ok(WalkState::new_unchecked(state.m_min() - growth as i64, amps))
}
