//! 2×2 operators in the Pauli basis, `c = a0·I + a·σ` with complex coefficients.
//!
//! These act on [`BlochState`] without ever forming a density matrix, using
//! `(u·σ)(v·σ) = (u·v)·I + i(u×v)·σ`.

use std::ops::{Add, Sub};

use num_complex::Complex64;

use crate::state::BlochState;

type C3 = [Complex64; 3];

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
fn dot(u: &C3, v: &C3) -> Complex64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

#[inline]
fn cross(u: &C3, v: &C3) -> C3 {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliOp {
    pub a0: Complex64,
    pub a: C3,
}

impl PauliOp {
    pub const fn new(a0: Complex64, a: C3) -> Self {
        PauliOp { a0, a }
    }

    pub fn zero() -> Self {
        PauliOp { a0: ZERO, a: [ZERO; 3] }
    }

    pub fn identity() -> Self {
        PauliOp { a0: ONE, a: [ZERO; 3] }
    }

    pub fn sigma_x() -> Self {
        PauliOp { a0: ZERO, a: [ONE, ZERO, ZERO] }
    }

    pub fn sigma_y() -> Self {
        PauliOp { a0: ZERO, a: [ZERO, ONE, ZERO] }
    }

    pub fn sigma_z() -> Self {
        PauliOp { a0: ZERO, a: [ZERO, ZERO, ONE] }
    }

    /// Atomic lowering operator `σ− = (σx − iσy)/2`.
    pub fn sigma_minus() -> Self {
        PauliOp { a0: ZERO, a: [ONE * 0.5, -I * 0.5, ZERO] }
    }

    pub fn sigma_plus() -> Self {
        Self::sigma_minus().adjoint()
    }

    /// `|−⟩⟨+| = (σz + iσy)/2`.
    pub fn sigma_minus_plus() -> Self {
        PauliOp { a0: ZERO, a: [ZERO, I * 0.5, ONE * 0.5] }
    }

    /// `|+⟩⟨−| = (σz − iσy)/2`.
    pub fn sigma_plus_minus() -> Self {
        PauliOp { a0: ZERO, a: [ZERO, -I * 0.5, ONE * 0.5] }
    }

    /// Projector onto `|±⟩`, `(1 ± σx)/2`.
    pub fn projector_x(sign: f64) -> Self {
        PauliOp { a0: ONE * 0.5, a: [ONE * (0.5 * sign), ZERO, ZERO] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.scaled_c(Complex64::new(s, 0.0))
    }

    pub fn scaled_c(&self, s: Complex64) -> Self {
        PauliOp { a0: self.a0 * s, a: [self.a[0] * s, self.a[1] * s, self.a[2] * s] }
    }

    pub fn adjoint(&self) -> Self {
        PauliOp { a0: self.a0.conj(), a: [self.a[0].conj(), self.a[1].conj(), self.a[2].conj()] }
    }

    /// Operator product `self · rhs`.
    pub fn product(&self, rhs: &PauliOp) -> PauliOp {
        let ab = cross(&self.a, &rhs.a);
        PauliOp {
            a0: self.a0 * rhs.a0 + dot(&self.a, &rhs.a),
            a: [
                self.a0 * rhs.a[0] + rhs.a0 * self.a[0] + I * ab[0],
                self.a0 * rhs.a[1] + rhs.a0 * self.a[1] + I * ab[1],
                self.a0 * rhs.a[2] + rhs.a0 * self.a[2] + I * ab[2],
            ],
        }
    }

    /// `Tr[c ρ]`.
    pub fn expectation(&self, rho: &BlochState) -> Complex64 {
        self.a0 * rho.w + self.a[0] * rho.x + self.a[1] * rho.y + self.a[2] * rho.z
    }

    /// `c ρ c†`.
    pub fn sandwich(&self, rho: &BlochState) -> BlochState {
        let r = [ONE * rho.x, ONE * rho.y, ONE * rho.z];
        let ar = cross(&self.a, &r);
        let p0 = self.a0 * rho.w + dot(&self.a, &r);
        let p = [
            self.a0 * r[0] + self.a[0] * rho.w + I * ar[0],
            self.a0 * r[1] + self.a[1] * rho.w + I * ar[1],
            self.a0 * r[2] + self.a[2] * rho.w + I * ar[2],
        ];
        let ac = [self.a[0].conj(), self.a[1].conj(), self.a[2].conj()];
        let a0c = self.a0.conj();
        let pa = cross(&p, &ac);
        let q0 = p0 * a0c + dot(&p, &ac);
        BlochState {
            w: q0.re,
            x: (p0 * ac[0] + a0c * p[0] + I * pa[0]).re,
            y: (p0 * ac[1] + a0c * p[1] + I * pa[1]).re,
            z: (p0 * ac[2] + a0c * p[2] + I * pa[2]).re,
        }
    }

    /// `c ρ + ρ c†`.
    pub fn anticomm_sum(&self, rho: &BlochState) -> BlochState {
        let re = [self.a[0].re, self.a[1].re, self.a[2].re];
        let im = [self.a[0].im, self.a[1].im, self.a[2].im];
        let (rx, ry, rz) = (rho.x, rho.y, rho.z);
        let imxr = [im[1] * rz - im[2] * ry, im[2] * rx - im[0] * rz, im[0] * ry - im[1] * rx];
        let a0 = self.a0.re;
        BlochState {
            w: 2.0 * (a0 * rho.w + re[0] * rx + re[1] * ry + re[2] * rz),
            x: 2.0 * (a0 * rx + rho.w * re[0] - imxr[0]),
            y: 2.0 * (a0 * ry + rho.w * re[1] - imxr[1]),
            z: 2.0 * (a0 * rz + rho.w * re[2] - imxr[2]),
        }
    }

    /// `−i[c, ρ]` for Hermitian `c`.
    pub fn hamiltonian_flow(&self, rho: &BlochState) -> BlochState {
        // −i[h·σ, ρ] moves the Bloch vector by 2 h × r.
        let a = [self.a[0].re, self.a[1].re, self.a[2].re];
        BlochState {
            w: 0.0,
            x: 2.0 * (a[1] * rho.z - a[2] * rho.y),
            y: 2.0 * (a[2] * rho.x - a[0] * rho.z),
            z: 2.0 * (a[0] * rho.y - a[1] * rho.x),
        }
    }

    /// Lindblad dissipator `D[c]ρ = cρc† − ½{c†c, ρ}`.
    pub fn dissipator(&self, rho: &BlochState) -> BlochState {
        let cdc = self.adjoint().product(self);
        self.sandwich(rho) - cdc.anticomm_sum(rho) * 0.5
    }

    /// Measurement superoperator `H[c]ρ = cρ + ρc† − Tr[cρ + ρc†]ρ`.
    pub fn innovation(&self, rho: &BlochState) -> BlochState {
        let s = self.anticomm_sum(rho);
        s - *rho * s.w
    }
}

impl Add for PauliOp {
    type Output = PauliOp;
    fn add(self, o: PauliOp) -> PauliOp {
        PauliOp {
            a0: self.a0 + o.a0,
            a: [self.a[0] + o.a[0], self.a[1] + o.a[1], self.a[2] + o.a[2]],
        }
    }
}

impl Sub for PauliOp {
    type Output = PauliOp;
    fn sub(self, o: PauliOp) -> PauliOp {
        PauliOp {
            a0: self.a0 - o.a0,
            a: [self.a[0] - o.a[0], self.a[1] - o.a[1], self.a[2] - o.a[2]],
        }
    }
}
