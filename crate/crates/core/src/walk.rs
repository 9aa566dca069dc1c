//! Coin-walker states on a growing 1D lattice and the plate operators that
//! drive them.
//!
//! A state stores dense complex amplitude pairs (left, right circular) over a
//! contiguous site window. The window grows by one site on each side before a
//! displacement is applied, so no amplitude is ever truncated. Amplitudes are
//! never renormalized during evolution; the decayed squared norm is the
//! walker's survival weight and is consumed by the analysis layer.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// The two coin basis states, ordered (L, R) to match the 2x2 operator
/// layout used throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoinIndex {
    L = 0,
    R = 1,
}

/// What a physical layer does to the beam.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlateKind {
    /// Fixed quarter-wave-like coin rotation (1/sqrt2) [[1, i], [i, 1]].
    CoinRotation,
    /// Dichroic conditional displacement with parameters (delta, eta, eta').
    Displacement,
}

/// Parameters of one physical layer.
///
/// `delta` is the optical birefringence in radians (ignored for coin
/// rotations, which are fixed), `eta = eta_e - eta_o` the dichroic parameter
/// and `eta_prime = eta_e + eta_o` the global attenuation exponent. Lossy
/// convention: both are nonnegative; gain is not modeled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateParams {
    kind: PlateKind,
    delta: f64,
    eta: f64,
    eta_prime: f64,
}

impl PlateParams {
    /// The fixed coin rotation plate.
    pub fn coin_rotation() -> Self {
        PlateParams { kind: PlateKind::CoinRotation, delta: 0.0, eta: 0.0, eta_prime: 0.0 }
    }

    /// Displacement plate with the passive default `eta_prime = eta`
    /// (ordinary wave lossless), so one application never grows the norm.
    pub fn displacement(delta: f64, eta: f64) -> Result<Self> {
        Self::displacement_with_attenuation(delta, eta, eta)
    }

    /// Displacement plate with an explicit global attenuation exponent.
    /// `eta_prime = 0` keeps only the dichroic part; normalized observables
    /// do not depend on this choice.
    pub fn displacement_with_attenuation(delta: f64, eta: f64, eta_prime: f64) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::NegativeDichroism(eta));
        }
        if !(eta_prime >= 0.0) {
            return Err(Error::NegativeAttenuation(eta_prime));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidProtocol(format!("non-finite birefringence {delta}")));
        }
        Ok(PlateParams { kind: PlateKind::Displacement, delta, eta, eta_prime })
    }

    pub fn kind(&self) -> PlateKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eta_prime(&self) -> f64 {
        self.eta_prime
    }

    /// True when the plate cannot amplify any state, i.e. eta' >= eta
    /// (equivalently eta_o >= 0).
    pub fn is_passive(&self) -> bool {
        self.eta_prime >= self.eta
    }
}

/// Ordered plate sequence making up a walk, with a step count marking how
/// the sequence splits into equal per-step subsequences for snapshotting.
///
/// The canonical walk step is `[CoinRotation, Displacement]`: the coin acts
/// first, then the conditional displacement.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    plates: Vec<PlateParams>,
    steps: usize,
}

impl Protocol {
    /// Protocol with no plates; evolution returns only the input snapshot.
    pub fn empty() -> Self {
        Protocol { plates: Vec::new(), steps: 0 }
    }

    /// General constructor. `plates` is the full flattened sequence; its
    /// length must split evenly into `steps` subsequences.
    pub fn from_plates(plates: Vec<PlateParams>, steps: usize) -> Result<Self> {
        if steps == 0 {
            if !plates.is_empty() {
                return Err(Error::InvalidProtocol(
                    "zero steps requires an empty plate list".into(),
                ));
            }
            return Ok(Self::empty());
        }
        if plates.is_empty() {
            return Err(Error::InvalidProtocol(format!(
                "{steps} steps requested but the plate list is empty"
            )));
        }
        if plates.len() % steps != 0 {
            return Err(Error::InvalidProtocol(format!(
                "{} plates cannot split into {} equal steps",
                plates.len(),
                steps
            )));
        }
        Ok(Protocol { plates, steps })
    }

    /// `steps` repetitions of `[CoinRotation, Displacement(delta, eta)]`
    /// with the same dichroism every step and the passive `eta' = eta`.
    pub fn uniform_walk(delta: f64, eta: f64, steps: usize) -> Result<Self> {
        Self::uniform_walk_with_attenuation(delta, eta, eta, steps)
    }

    /// Uniform walk with an explicit global attenuation exponent per plate.
    pub fn uniform_walk_with_attenuation(
        delta: f64,
        eta: f64,
        eta_prime: f64,
        steps: usize,
    ) -> Result<Self> {
        let etas = vec![eta; steps];
        let eta_primes = vec![eta_prime; steps];
        Self::walk_with_etas_and_attenuation(delta, &etas, &eta_primes)
    }

    /// One step per entry of `etas`, modeling a stack of plates with
    /// slightly different dichroism; `eta' = eta` for each.
    pub fn walk_with_etas(delta: f64, etas: &[f64]) -> Result<Self> {
        Self::walk_with_etas_and_attenuation(delta, etas, etas)
    }

    /// Per-step dichroism and per-step attenuation exponents.
    pub fn walk_with_etas_and_attenuation(
        delta: f64,
        etas: &[f64],
        eta_primes: &[f64],
    ) -> Result<Self> {
        if etas.len() != eta_primes.len() {
            return Err(Error::InvalidProtocol(format!(
                "{} dichroism values but {} attenuation values",
                etas.len(),
                eta_primes.len()
            )));
        }
        let mut plates = Vec::with_capacity(2 * etas.len());
        for (&eta, &etap) in etas.iter().zip(eta_primes) {
            plates.push(PlateParams::coin_rotation());
            plates.push(PlateParams::displacement_with_attenuation(delta, eta, etap)?);
        }
        Self::from_plates(plates, etas.len())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn plates(&self) -> &[PlateParams] {
        &self.plates
    }

    /// Number of plates making up one step.
    pub fn plates_per_step(&self) -> usize {
        if self.steps == 0 {
            0
        } else {
            self.plates.len() / self.steps
        }
    }

    /// The per-step subsequences, in order.
    pub fn step_slices(&self) -> impl Iterator<Item = &[PlateParams]> {
        let chunk = self.plates_per_step().max(1);
        self.plates.chunks(chunk).take(self.steps)
    }

    /// Number of displacement plates in the whole sequence, which is how
    /// many sites the window grows on each side.
    pub fn displacement_count(&self) -> usize {
        self.plates.iter().filter(|p| p.kind == PlateKind::Displacement).count()
    }

    /// If every displacement plate carries identical parameters, returns
    /// the shared (delta, eta, eta_prime).
    pub fn uniform_displacement(&self) -> Option<(f64, f64, f64)> {
        let mut it = self.plates.iter().filter(|p| p.kind == PlateKind::Displacement);
        let first = it.next()?;
        let params = (first.delta, first.eta, first.eta_prime);
        for p in it {
            if (p.delta, p.eta, p.eta_prime) != params {
                return None;
            }
        }
        Some(params)
    }
}

/// Complex amplitude field over (site, coin), stored densely on a
/// contiguous window starting at `m_min`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    m_min: i64,
    amps: Vec<[C64; 2]>,
}

impl WalkState {
    /// State supported only on site 0 with the given (L, R) coin
    /// amplitudes, normalized to unit norm.
    pub fn localized(coin_amplitudes: [C64; 2]) -> Result<Self> {
        let norm_sqr = coin_amplitudes[0].norm_sqr() + coin_amplitudes[1].norm_sqr();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::InvalidState(format!(
                "localized coin amplitudes have squared norm {norm_sqr}"
            )));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        Ok(WalkState {
            m_min: 0,
            amps: vec![[coin_amplitudes[0] * scale, coin_amplitudes[1] * scale]],
        })
    }

    /// Rebuild a state from raw parts, validating a finite positive norm.
    pub fn from_amplitudes(m_min: i64, amps: Vec<[C64; 2]>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("empty amplitude window".into()));
        }
        let norm_sqr: f64 =
            amps.iter().map(|a| a[0].norm_sqr() + a[1].norm_sqr()).sum();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::InvalidState(format!("squared norm {norm_sqr}")));
        }
        Ok(WalkState { m_min, amps })
    }

    pub(crate) fn new_unchecked(m_min: i64, amps: Vec<[C64; 2]>) -> Self {
        WalkState { m_min, amps }
    }

    /// First site of the window.
    pub fn m_min(&self) -> i64 {
        self.m_min
    }

    /// Last site of the window.
    pub fn m_max(&self) -> i64 {
        self.m_min + self.amps.len() as i64 - 1
    }

    /// Number of sites in the window.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Amplitude pair at site `m`; implicitly zero outside the window.
    pub fn amplitude(&self, m: i64) -> [C64; 2] {
        let idx = m - self.m_min;
        if idx < 0 || idx >= self.amps.len() as i64 {
            [C64::new(0.0, 0.0); 2]
        } else {
            self.amps[idx as usize]
        }
    }

    /// Raw dense amplitudes for the whole window.
    pub fn amplitudes(&self) -> &[[C64; 2]] {
        &self.amps
    }

    /// Iterate over (site, amplitude pair).
    pub fn sites(&self) -> impl Iterator<Item = (i64, [C64; 2])> + '_ {
        self.amps.iter().enumerate().map(move |(i, a)| (self.m_min + i as i64, *a))
    }

    /// Squared norm, i.e. the survival weight of the walker.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a[0].norm_sqr() + a[1].norm_sqr()).sum()
    }

    /// Apply the fixed coin rotation at every site:
    /// (aL, aR) -> (aL + i aR, i aL + aR) / sqrt2. Unitary; the window is
    /// unchanged.
    pub fn apply_coin(&self) -> WalkState {
        let i = C64::new(0.0, 1.0);
        let amps = self
            .amps
            .iter()
            .map(|&[l, r]| [(l + i * r) * FRAC_1_SQRT_2, (i * l + r) * FRAC_1_SQRT_2])
            .collect();
        WalkState { m_min: self.m_min, amps }
    }

    /// Apply the dichroic displacement with zeta = delta + i eta:
    ///
    /// aL'(m) = e^{-eta'/2} (cos(zeta/2) aL(m) + i sin(zeta/2) aR(m+1)),
    /// aR'(m) = e^{-eta'/2} (cos(zeta/2) aR(m) + i sin(zeta/2) aL(m-1)).
    ///
    /// The window grows by exactly one site on each side first, so the
    /// result holds every nonzero amplitude.
    pub fn apply_displacement(&self, delta: f64, eta: f64, eta_prime: f64) -> Result<WalkState> {
        if !(eta >= 0.0) {
            return Err(Error::NegativeDichroism(eta));
        }
        if !(eta_prime >= 0.0) {
            return Err(Error::NegativeAttenuation(eta_prime));
        }
        let half = C64::new(delta, eta) * 0.5;
        let damp = (-eta_prime / 2.0).exp();
        let c = half.cos() * damp;
        let is = C64::new(0.0, 1.0) * half.sin() * damp;
        let n = self.amps.len();
        let old = |idx: i64| -> [C64; 2] {
            if idx < 0 || idx >= n as i64 {
                [C64::new(0.0, 0.0); 2]
            } else {
                self.amps[idx as usize]
            }
        };
        // output index j holds site m = m_min - 1 + j; that site sits at
        // old index j - 1
        let mut amps = Vec::with_capacity(n + 2);
        for j in 0..(n as i64 + 2) {
            let here = old(j - 1);
            let right = old(j);
            let left = old(j - 2);
            amps.push([c * here[0] + is * right[1], c * here[1] + is * left[0]]);
        }
        Ok(WalkState { m_min: self.m_min - 1, amps })
    }

    /// Apply one plate.
    pub fn apply_plate(&self, plate: &PlateParams) -> Result<WalkState> {
        match plate.kind() {
            PlateKind::CoinRotation => Ok(self.apply_coin()),
            PlateKind::Displacement => {
                self.apply_displacement(plate.delta(), plate.eta(), plate.eta_prime())
            }
        }
    }

    /// Run the protocol, returning one snapshot per step including the
    /// input at t = 0.
    pub fn evolve(&self, protocol: &Protocol) -> Result<Vec<WalkState>> {
        let mut snaps = Vec::with_capacity(protocol.steps() + 1);
        snaps.push(self.clone());
        let mut cur = self.clone();
        for step in protocol.step_slices() {
            for plate in step {
                cur = cur.apply_plate(plate)?;
            }
            snaps.push(cur.clone());
        }
        Ok(snaps)
    }
}
