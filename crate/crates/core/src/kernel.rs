//! Convolution kernels for the transparent boundary conditions.
//!
//! The boundary condition at `x = X` is a discrete-in-time convolution
//! `c0 * sum_l R^l Psi_J^(m-l)` whose weights derive from Legendre
//! polynomials:
//!
//! `R^m(kappa, mu) = -kappa^m [P_m(mu) - P_(m-2)(mu)] / (2m - 1)`
//!
//! with `|kappa| = 1` and `mu` real in `(-1, 1)`. The parameters come from
//! the complex constant `a = a0 + i a1` (`a0 = V_inf / (hbar^2 B_inf)`,
//! `a1 = 2 rho_inf / (tau hbar B_inf)`) and the step-dependent factor
//! `alpha_tilde = 2 + (1 - 4 theta) h^2 a`. At `theta = 1/4` the factor
//! collapses to 2, the kernel loses its `h`-dependence, and it coincides
//! with the kernel of the semi-discrete boundary condition; that shared
//! code path is what `sdtbc_parameters` uses.
//!
//! Argument conventions follow `arg0`, the branch valued in `[0, 2*pi)`.
//! The argument of the product `a * alpha_tilde` is always formed as
//! `arg0(a) + arg0(alpha_tilde)`, never from the product itself, which
//! keeps the square-root branch in `c0` away from the positive real axis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::PhysicalParams;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// The complex constant `a = a0 + i a1` built from the tail coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatA {
    pub a0: f64,
    pub a1: f64,
}

impl HatA {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.a0, self.a1)
    }

    pub fn abs(&self) -> f64 {
        self.a0.hypot(self.a1)
    }

    /// `arg0` of `a`; lies in `(0, pi)` since `a1 > 0`.
    pub fn arg0(&self) -> f64 {
        arg0(self.value())
    }
}

/// Argument branch valued in `[0, 2*pi)`.
pub fn arg0(z: Complex64) -> f64 {
    let t = z.im.atan2(z.re);
    if t < 0.0 {
        t + TWO_PI
    } else {
        t
    }
}

/// `a = V_inf/(hbar^2 B_inf) + i 2 rho_inf/(tau hbar B_inf)`.
pub fn hat_a(tau: f64, phys: &PhysicalParams) -> Result<HatA> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive and finite, got {tau}"
        )));
    }
    let hbar = phys.hbar();
    let a0 = phys.v_inf() / (hbar * hbar * phys.b_inf());
    let a1 = 2.0 * phys.rho_inf() / (tau * hbar * phys.b_inf());
    Ok(HatA { a0, a1 })
}

/// The decomposition `alpha_hat = a * alpha_tilde` with
/// `alpha_tilde = 2 + (1 - 4 theta) h^2 a` and
/// `beta_hat = 2 a0 + (1 - 4 theta) h^2 |a|^2`.
#[derive(Debug, Clone, Copy)]
pub struct AlphaDecomposition {
    pub hat: HatA,
    pub alpha_tilde: Complex64,
    theta: f64,
    h: f64,
}

impl AlphaDecomposition {
    pub fn new(theta: f64, h: f64, hat: HatA) -> Result<Self> {
        if theta > 0.25 {
            return Err(Error::ThetaOutOfRange(theta));
        }
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "space step must be positive and finite, got {h}"
            )));
        }
        let alpha_tilde = Complex64::new(2.0, 0.0) + hat.value() * ((1.0 - 4.0 * theta) * h * h);
        Ok(Self {
            hat,
            alpha_tilde,
            theta,
            h,
        })
    }

    pub fn alpha_hat(&self) -> Complex64 {
        self.hat.value() * self.alpha_tilde
    }

    pub fn beta_hat(&self) -> f64 {
        2.0 * self.hat.a0 + (1.0 - 4.0 * self.theta) * self.h * self.h * self.hat.abs().powi(2)
    }

    /// `arg0(alpha_hat) = arg0(a) + arg0(alpha_tilde)`, in `(0, 2*pi)`.
    pub fn arg0_alpha_hat(&self) -> f64 {
        self.hat.arg0() + arg0(self.alpha_tilde)
    }
}

/// Kernel parameters `(c0, kappa, mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub c0: Complex64,
    pub kappa: Complex64,
    pub mu: f64,
}

impl KernelParams {
    fn from_decomposition(decomp: &AlphaDecomposition) -> Result<Self> {
        let a = decomp.hat.value();
        let at = decomp.alpha_tilde;
        let scale = decomp.hat.abs() * at.norm();
        // kappa = -e^{i(arg a + arg alpha_tilde)} and
        // mu = cos(arg a - arg alpha_tilde), evaluated as normalized products
        // so the V_inf = 0, theta = 1/4 case yields kappa = -i and mu = 0
        // exactly (the recurrence then zeroes every odd entry exactly).
        let kappa = -(a * at) / scale;
        let mu = (a * at.conj()).re / scale;
        if mu.abs() >= 1.0 || mu.is_nan() {
            return Err(Error::DegenerateKernel(mu));
        }
        let half_arg = 0.5 * decomp.arg0_alpha_hat();
        let c0 = Complex64::new(half_arg.cos(), -half_arg.sin()) * (-0.5 * scale.sqrt());
        Ok(Self { c0, kappa, mu })
    }
}

/// Kernel parameters of the discrete transparent boundary condition for the
/// scheme parameter `theta <= 1/4` on tail step `h`.
pub fn dtbc_parameters(
    theta: f64,
    h: f64,
    tau: f64,
    phys: &PhysicalParams,
) -> Result<KernelParams> {
    let decomp = AlphaDecomposition::new(theta, h, hat_a(tau, phys)?)?;
    KernelParams::from_decomposition(&decomp)
}

/// Kernel parameters of the semi-discrete transparent boundary condition.
/// Same code path as `dtbc_parameters` at `theta = 1/4`, where the
/// `h`-dependent factor vanishes identically.
pub fn sdtbc_parameters(tau: f64, phys: &PhysicalParams) -> Result<KernelParams> {
    dtbc_parameters(0.25, 1.0, tau, phys)
}

/// Precomputed convolution weights `R^0 ... R^M` with their generating
/// parameters. Built once per run; never regenerated per step.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    params: KernelParams,
    values: Vec<Complex64>,
}

impl KernelTable {
    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn c0(&self) -> Complex64 {
        self.params.c0
    }

    /// Entries `R^0 ... R^M`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Generates `R^0 ... R^(m_max)` by the recurrence
///
/// `R^0 = 1`, `R^1 = -kappa mu`,
/// `R^m = ((2m-3)/m) kappa mu R^(m-1) - ((m-3)/m) kappa^2 R^(m-2)`.
pub fn kernel_table(params: KernelParams, m_max: usize) -> KernelTable {
    let mut values = Vec::with_capacity(m_max + 1);
    values.push(Complex64::new(1.0, 0.0));
    if m_max >= 1 {
        values.push(-params.kappa * params.mu);
    }
    let kappa_mu = params.kappa * params.mu;
    let kappa_sq = params.kappa * params.kappa;
    for m in 2..=m_max {
        let mf = m as f64;
        let next = kappa_mu * ((2.0 * mf - 3.0) / mf) * values[m - 1]
            - kappa_sq * ((mf - 3.0) / mf) * values[m - 2];
        values.push(next);
    }
    KernelTable { params, values }
}

/// Legendre polynomial `P_m(x)` by the standard three-term recurrence;
/// `P_m = 0` for negative degree.
pub fn legendre_p(m: i64, x: f64) -> f64 {
    if m < 0 {
        return 0.0;
    }
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut curr = x;
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * curr - kf * prev) / (kf + 1.0);
        prev = curr;
        curr = next;
    }
    curr
}

/// Closed form `R^m = -kappa^m [P_m(mu) - P_(m-2)(mu)] / (2m - 1)`.
///
/// Independent route from the recurrence in `kernel_table`; the two must
/// agree entrywise.
pub fn kernel_legendre_oracle(kappa: Complex64, mu: f64, m: usize) -> Complex64 {
    let p_m = legendre_p(m as i64, mu);
    let p_m2 = legendre_p(m as i64 - 2, mu);
    let denom = 2.0 * m as f64 - 1.0;
    -kappa.powu(m as u32) * ((p_m - p_m2) / denom)
}

/// Leading asymptotic term of `R^m` for large `m`:
///
/// `((-1)^m / m^(3/2)) sqrt((2/pi) sin(da)) e^(i m sa) cos((m - 1/2) da - 3*pi/4)`
///
/// with `da = arg0(a) - arg0(alpha_tilde)` and `sa = arg0(a) + arg0(alpha_tilde)`.
/// The remainder is `O(m^(-5/2))` away from `|mu| = 1`.
///
/// The phase follows from the Laplace form of `P_m(cos da)`: the difference
/// `P_m - P_(m-2)` collapses to `-2 sin(da) sin((m - 1/2) da - pi/4)`, i.e.
/// `cos((m - 1/2) da - 3*pi/4)`. With the opposite phase sign the mismatch
/// against the recurrence grows like `m^(-3/2)` instead of `m^(-5/2)`.
pub fn kernel_asymptotic(decomp: &AlphaDecomposition, m: usize) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "asymptotic term needs m >= 1".into(),
        ));
    }
    let params = KernelParams::from_decomposition(decomp)?;
    let margin = 1.0 - params.mu.abs();
    if margin < 1e-12 {
        return Err(Error::AsymptoticsInvalid(margin));
    }
    let diff = decomp.hat.arg0() - arg0(decomp.alpha_tilde);
    let sum = decomp.hat.arg0() + arg0(decomp.alpha_tilde);
    let mf = m as f64;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let amplitude = sign / mf.powf(1.5)
        * (2.0 / std::f64::consts::PI * diff.sin()).sqrt()
        * ((mf - 0.5) * diff - 0.75 * std::f64::consts::PI).cos();
    Ok(Complex64::from_polar(1.0, mf * sum) * amplitude)
}

/// Measured admissibility of `(theta, h, tau)` against a threshold `A >= 1`.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityReport {
    /// `tau |V_inf| / (hbar rho_inf)`
    pub cond1: f64,
    /// `(1 - 4 theta) (rho_inf / (hbar B_inf)) h^2 / tau`
    pub cond2: f64,
    /// `1 - |mu_theta|`
    pub mu_margin: f64,
    pub pass: bool,
}

/// Checks the sufficient conditions keeping `|mu_theta|` away from 1.
pub fn admissibility(
    theta: f64,
    h: f64,
    tau: f64,
    phys: &PhysicalParams,
    a_limit: f64,
) -> Result<AdmissibilityReport> {
    if a_limit < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "admissibility threshold must be >= 1, got {a_limit}"
        )));
    }
    let params = dtbc_parameters(theta, h, tau, phys)?;
    let cond1 = tau * phys.v_inf().abs() / (phys.hbar() * phys.rho_inf());
    let cond2 = (1.0 - 4.0 * theta) * phys.rho_inf() / (phys.hbar() * phys.b_inf()) * h * h / tau;
    Ok(AdmissibilityReport {
        cond1,
        cond2,
        mu_margin: 1.0 - params.mu.abs(),
        pass: cond1 <= a_limit && cond2 <= a_limit,
    })
}

/// Branch offset `Delta_theta = 2 arg0(1 - 2 theta h^2 a) - arg0(alpha_hat)`.
pub fn delta_theta(theta: f64, h: f64, tau: f64, phys: &PhysicalParams) -> Result<f64> {
    let decomp = AlphaDecomposition::new(theta, h, hat_a(tau, phys)?)?;
    let z = Complex64::new(1.0, 0.0) - decomp.hat.value() * (2.0 * theta * h * h);
    Ok(2.0 * arg0(z) - decomp.arg0_alpha_hat())
}

/// Asserts the window that fixes the minus sign in `c0`: the offset must
/// land in `(-2*pi, 0)` for `theta <= 0` and in `(2*pi, 4*pi)` for
/// `0 < theta <= 1/4`. Returns it on success so sweeps can log it.
pub fn delta_theta_checked(theta: f64, h: f64, tau: f64, phys: &PhysicalParams) -> Result<f64> {
    let delta = delta_theta(theta, h, tau, phys)?;
    let ok = if theta <= 0.0 {
        -TWO_PI < delta && delta < 0.0
    } else {
        TWO_PI < delta && delta < 2.0 * TWO_PI
    };
    if !ok {
        return Err(Error::BranchWindow { theta, delta });
    }
    Ok(delta)
}

/// Bound on the kernel divergence `|c0_theta R^m_theta - c0_D R_D^m|`:
///
/// `(3 sqrt(2)/|alpha_tilde| + 1/(|2m-1| (|alpha_tilde|^(1/2) + sqrt(2))))
///  * (1 - 4 theta) h^2 |a|^(3/2)`.
pub fn divergence_bound(
    theta: f64,
    h: f64,
    tau: f64,
    phys: &PhysicalParams,
    m: usize,
) -> Result<f64> {
    let decomp = AlphaDecomposition::new(theta, h, hat_a(tau, phys)?)?;
    let at_abs = decomp.alpha_tilde.norm();
    let sqrt2 = std::f64::consts::SQRT_2;
    let two_m_1 = (2.0 * m as f64 - 1.0).abs();
    let factor = 3.0 * sqrt2 / at_abs + 1.0 / (two_m_1 * (at_abs.sqrt() + sqrt2));
    Ok(factor * (1.0 - 4.0 * theta) * h * h * decomp.hat.abs().powf(1.5))
}

/// Full discrete convolution `c0 * sum_(l=0)^(m-1) R^l Phi^(m-l)` where
/// `history[i]` holds `Phi^(i+1)` and `Phi^0` is treated as exactly zero.
pub fn convolve(
    c0: Complex64,
    table: &KernelTable,
    history: &[Complex64],
    m: usize,
) -> Result<Complex64> {
    if history.len() < m {
        return Err(Error::HistoryTooShort {
            len: history.len(),
            needed: m,
        });
    }
    if table.len() < m {
        return Err(Error::KernelTableTooShort {
            len: table.len(),
            needed: m,
        });
    }
    let mut sum = Complex64::ZERO;
    for l in 0..m {
        sum += table.values()[l] * history[m - l - 1];
    }
    Ok(c0 * sum)
}

/// Envelope bound `|R^m| <= 2 / max(1, 2m - 1)`.
pub fn kernel_envelope(m: usize) -> f64 {
    2.0 / (2.0 * m as f64 - 1.0).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SpaceMesh;
    use num_complex::Complex64 as C;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn section3_phys() -> (SpaceMesh, PhysicalParams) {
        let mesh = SpaceMesh::uniform(1.5, 800).unwrap();
        let phys = PhysicalParams::constant(&mesh, 1.0, 1.0, 2.0, 0.0).unwrap();
        (mesh, phys)
    }

    #[test]
    fn hat_a_reference_values() {
        let (_, phys) = section3_phys();
        let a = hat_a(2e-6, &phys).unwrap();
        assert_eq!(a.a0, 0.0);
        assert!((a.a1 - 5e5).abs() < 1e-4);

        // doubling tau halves a1 and leaves a0 unchanged
        let a2 = hat_a(4e-6, &phys).unwrap();
        assert_eq!(a2.a0, a.a0);
        assert!((a2.a1 - 0.5 * a.a1).abs() < 1e-9);

        assert!(hat_a(0.0, &phys).is_err());
        assert!(hat_a(-1.0, &phys).is_err());
    }

    #[test]
    fn dtbc_parameters_theta_zero_reference() {
        // frozen from a high-precision evaluation of the decomposition at
        // hbar=1, rho=1, B=2, V=0, tau=2e-6, h=1.5/800
        let (mesh, phys) = section3_phys();
        let h = mesh.tail_step();
        let decomp = AlphaDecomposition::new(0.0, h, hat_a(2e-6, &phys).unwrap()).unwrap();
        assert!((decomp.alpha_tilde - C::new(2.0, 1.7578125)).norm() < 1e-12);

        let p = dtbc_parameters(0.0, h, 2e-6, &phys).unwrap();
        assert!((p.mu - 0.6601647742185791).abs() < 1e-12);
        assert!((p.kappa - C::new(0.6601647742185791, -0.7511208097775833)).norm() < 1e-12);
        assert!((p.c0 - C::new(-237.81229622018374, 525.6246291161749)).norm() < 1e-8);
        assert!((p.kappa.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dtbc_rejects_unstable_theta() {
        let (mesh, phys) = section3_phys();
        assert!(dtbc_parameters(0.2500001, mesh.tail_step(), 2e-6, &phys).is_err());
        assert!(dtbc_parameters(0.5, mesh.tail_step(), 2e-6, &phys).is_err());
    }

    #[test]
    fn sdtbc_reference_values() {
        // V=0 closed form: c0 = -(a1/2)^(1/2) e^(-i pi/4), kappa = -i, mu = 0
        let (_, phys) = section3_phys();
        let p = sdtbc_parameters(2e-6, &phys).unwrap();
        assert_eq!(p.mu, 0.0);
        assert_eq!(p.kappa, C::new(0.0, -1.0));
        assert!((p.c0 - C::new(-353.5533905932738, 353.5533905932738)).norm() < 1e-9);

        // with mu exactly zero, every odd entry of the generated table is an
        // exact zero and the even tail follows R^(2l) = (2l-3)/(2l) R^(2l-2)
        let table = kernel_table(p, 2001);
        for l in 1..=1000 {
            assert_eq!(
                table.values()[2 * l - 1],
                C::ZERO,
                "odd entry {}",
                2 * l - 1
            );
            let want = table.values()[2 * l - 2] * ((2.0 * l as f64 - 3.0) / (2.0 * l as f64));
            assert!((table.values()[2 * l] - want).norm() <= 1e-16 * want.norm());
        }
        assert!((table.values()[2] - C::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sdtbc_is_dtbc_quarter_bit_for_bit() {
        let (_, phys) = section3_phys();
        for tau in [2e-6, 1e-6, 3.7e-5] {
            let sd = sdtbc_parameters(tau, &phys).unwrap();
            for h in [1e-3, 1.0, 1e3] {
                let dt = dtbc_parameters(0.25, h, tau, &phys).unwrap();
                assert_eq!(sd, dt);
            }
        }
    }

    #[test]
    fn quarter_theta_parameters_independent_of_h() {
        let mesh = SpaceMesh::uniform(1.5, 16).unwrap();
        let phys = PhysicalParams::constant(&mesh, 1.0, 0.7, 1.3, -2.5).unwrap();
        let base = dtbc_parameters(0.25, 1e-3, 5e-5, &phys).unwrap();
        for h in [1e-2, 1.0, 1e3] {
            assert_eq!(base, dtbc_parameters(0.25, h, 5e-5, &phys).unwrap());
        }
    }

    #[test]
    fn kernel_table_small_cases() {
        // kappa = -i, mu = 0: [1, 0, -1/2, 0, -1/8]
        let params = KernelParams {
            c0: C::new(1.0, 0.0),
            kappa: C::new(0.0, -1.0),
            mu: 0.0,
        };
        let table = kernel_table(params, 4);
        let want = [
            C::new(1.0, 0.0),
            C::ZERO,
            C::new(-0.5, 0.0),
            C::ZERO,
            C::new(-0.125, 0.0),
        ];
        for (got, want) in table.values().iter().zip(&want) {
            assert!((got - want).norm() < 1e-15);
        }

        // any (kappa, mu), M = 1 -> [1, -kappa mu]
        let params = KernelParams {
            c0: C::new(1.0, 0.0),
            kappa: C::new(0.6, 0.8),
            mu: 0.37,
        };
        let table = kernel_table(params, 1);
        assert_eq!(table.values()[0], C::new(1.0, 0.0));
        assert!((table.values()[1] + params.kappa * 0.37).norm() < 1e-15);

        // kappa = 1, mu = 0.3: R^2 = 0.455
        let params = KernelParams {
            c0: C::new(1.0, 0.0),
            kappa: C::new(1.0, 0.0),
            mu: 0.3,
        };
        let table = kernel_table(params, 2);
        assert!((table.values()[2] - C::new(0.455, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn legendre_reference_values() {
        assert_eq!(legendre_p(-2, 0.5), 0.0);
        assert_eq!(legendre_p(0, 0.5), 1.0);
        assert_eq!(legendre_p(1, 0.5), 0.5);
        assert!((legendre_p(2, 0.3) + 0.365).abs() < 1e-15);
        // P_n(1) = 1, P_n(-1) = (-1)^n
        for n in 0..20 {
            assert!((legendre_p(n, 1.0) - 1.0).abs() < 1e-12);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((legendre_p(n, -1.0) - sign).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_matches_hand_values() {
        let kappa = C::new(0.28, -0.96);
        assert!((kernel_legendre_oracle(kappa, 0.4, 0) - C::new(1.0, 0.0)).norm() < 1e-15);
        assert!((kernel_legendre_oracle(kappa, 0.4, 1) + kappa * 0.4).norm() < 1e-15);
    }

    #[test]
    fn recurrence_matches_oracle_for_section3_parameters() {
        let (mesh, phys) = section3_phys();
        for theta in [0.0, 1.0 / 12.0, 1.0 / 6.0, 0.25] {
            let params = dtbc_parameters(theta, mesh.tail_step(), 2e-6, &phys).unwrap();
            let table = kernel_table(params, 1000);
            for (m, got) in table.values().iter().enumerate() {
                let want = kernel_legendre_oracle(params.kappa, params.mu, m);
                let scale = want.norm().max(kernel_envelope(m));
                assert!(
                    (got - want).norm() <= 1e-12 * scale,
                    "theta={theta}, m={m}: recurrence {got} vs closed form {want}"
                );
                assert!(got.norm() <= kernel_envelope(m) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn parameter_routes_agree_on_random_sweeps() {
        // (p57)-style evaluation vs the decomposition forms
        let mut rng = StdRng::seed_from_u64(0x7bc1d);
        let mesh = SpaceMesh::uniform(1.0, 4).unwrap();
        for _ in 0..500 {
            let hbar = rng.gen_range(0.2..4.0);
            let rho = rng.gen_range(0.2..4.0);
            let b = rng.gen_range(0.2..4.0);
            let v = rng.gen_range(-30.0..30.0);
            let theta = rng.gen_range(-1.0..0.25);
            let h = 10f64.powf(rng.gen_range(-4.0..0.0));
            let tau = 10f64.powf(rng.gen_range(-7.0..-1.0));
            let phys = PhysicalParams::constant(&mesh, hbar, rho, b, v).unwrap();

            let p = dtbc_parameters(theta, h, tau, &phys).unwrap();
            assert!((p.kappa.norm() - 1.0).abs() < 1e-12);
            assert!(p.mu.abs() < 1.0);

            let decomp = AlphaDecomposition::new(theta, h, hat_a(tau, &phys).unwrap()).unwrap();
            let alpha_hat = decomp.alpha_hat();
            let mu_direct = decomp.beta_hat() / alpha_hat.norm();
            assert!((p.mu - mu_direct).abs() < 1e-12);

            let phi = decomp.arg0_alpha_hat();
            let kappa_direct = -C::from_polar(1.0, phi);
            assert!((p.kappa - kappa_direct).norm() < 1e-12);

            let c0_direct = C::from_polar(alpha_hat.norm().sqrt() / 2.0, -0.5 * phi) * -1.0;
            assert!((p.c0 - c0_direct).norm() < 1e-10 * p.c0.norm().max(1.0));

            // arg0(-c0) in (-pi, 0]: the square root lands in the lower half plane
            let neg_c0 = -p.c0;
            assert!(neg_c0.arg() <= 0.0 && neg_c0.arg() > -std::f64::consts::PI);
        }
    }

    #[test]
    fn delta_theta_reference_windows() {
        let (mesh, phys) = section3_phys();
        let h = mesh.tail_step();
        // theta = 0: Delta = -arg0(alpha_hat)
        let d0 = delta_theta_checked(0.0, h, 2e-6, &phys).unwrap();
        let decomp = AlphaDecomposition::new(0.0, h, hat_a(2e-6, &phys).unwrap()).unwrap();
        assert!((d0 + decomp.arg0_alpha_hat()).abs() < 1e-12);
        assert!(-TWO_PI < d0 && d0 < 0.0);
        // frozen high-precision value
        assert!((d0 + 2.291_834_437_649_748).abs() < 1e-10);

        let d4 = delta_theta_checked(0.25, h, 2e-6, &phys).unwrap();
        assert!(TWO_PI < d4 && d4 < 2.0 * TWO_PI);
        assert!((d4 - 9.553498065854573).abs() < 1e-10);
    }

    #[test]
    fn divergence_bound_shape() {
        let (mesh, phys) = section3_phys();
        let h = mesh.tail_step();
        // theta = 1/4: factor (1 - 4 theta) = 0
        for m in [0, 1, 17, 4000] {
            assert_eq!(divergence_bound(0.25, h, 2e-6, &phys, m).unwrap(), 0.0);
        }
        // non-increasing in m
        let mut prev = f64::INFINITY;
        for m in 0..200 {
            let b = divergence_bound(1.0 / 12.0, h, 2e-6, &phys, m).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn convolve_small_cases() {
        let params = KernelParams {
            c0: C::new(2.0, -1.0),
            kappa: C::new(0.6, 0.8),
            mu: 0.25,
        };
        let table = kernel_table(params, 8);
        let zeros = vec![C::ZERO; 8];
        assert_eq!(convolve(params.c0, &table, &zeros, 8).unwrap(), C::ZERO);

        // m = 1: c0 Phi^1
        let phi1 = C::new(0.3, 0.7);
        assert!(
            (convolve(params.c0, &table, &[phi1], 1).unwrap() - params.c0 * phi1).norm() < 1e-15
        );

        // m = 2: c0 (Phi^2 - kappa mu Phi^1)
        let phi2 = C::new(-1.0, 0.2);
        let got = convolve(params.c0, &table, &[phi1, phi2], 2).unwrap();
        let want = params.c0 * (phi2 - params.kappa * params.mu * phi1);
        assert!((got - want).norm() < 1e-14);

        assert!(convolve(params.c0, &table, &[phi1], 2).is_err());
        assert!(convolve(params.c0, &table, &zeros, 9).is_err());
    }

    #[test]
    fn admissibility_reference() {
        let (mesh, phys) = section3_phys();
        let h = mesh.tail_step();
        let report = admissibility(1.0 / 12.0, h, 2e-6, &phys, 1.0).unwrap();
        assert_eq!(report.cond1, 0.0); // V = 0
        assert!((report.cond2 - 0.5859375).abs() < 1e-12);
        assert!(report.pass);
        assert!(report.mu_margin > 0.0 && report.mu_margin < 1.0);

        let quarter = admissibility(0.25, h, 2e-6, &phys, 1.0).unwrap();
        assert_eq!(quarter.cond2, 0.0);

        assert!(admissibility(0.0, h, 2e-6, &phys, 0.5).is_err());
    }

    #[test]
    fn asymptotic_v0_quarter_sine_factor_is_one() {
        // V = 0, theta = 1/4: arg a - arg alpha_tilde = pi/2, so the sine
        // factor is 1 and |leading term| = m^(-3/2) sqrt(2/pi) |cos(...)|
        let (_, phys) = section3_phys();
        let decomp = AlphaDecomposition::new(0.25, 1.0, hat_a(2e-6, &phys).unwrap()).unwrap();
        let m = 100;
        let term = kernel_asymptotic(&decomp, m).unwrap();
        let diff = decomp.hat.arg0() - arg0(decomp.alpha_tilde);
        assert!((diff - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let envelope = (2.0 / std::f64::consts::PI).sqrt() / (m as f64).powf(1.5);
        assert!(term.norm() <= envelope * (1.0 + 1e-12));
    }

    #[test]
    fn asymptotic_tracks_kernel_tail() {
        let (mesh, phys) = section3_phys();
        let h = mesh.tail_step();
        let theta = 1.0 / 12.0;
        let decomp = AlphaDecomposition::new(theta, h, hat_a(2e-6, &phys).unwrap()).unwrap();
        let params = dtbc_parameters(theta, h, 2e-6, &phys).unwrap();
        let table = kernel_table(params, 20_000);
        // residual * m^(5/2) stays bounded; with the section-3 parameters the
        // window maximum sits near 0.58
        let mut worst: f64 = 0.0;
        for m in 1000..=20_000 {
            let lead = kernel_asymptotic(&decomp, m).unwrap();
            let residual = (table.values()[m] - lead).norm() * (m as f64).powf(2.5);
            worst = worst.max(residual);
        }
        assert!(worst < 1.0, "scaled residual {worst}");
        // frozen reference point (high-precision Legendre evaluation):
        // m = 1000 residual is 1.955e-9
        let lead = kernel_asymptotic(&decomp, 1000).unwrap();
        let err = (table.values()[1000] - lead).norm();
        assert!((err - 1.955e-9).abs() < 2e-11, "residual {err}");
    }

    #[test]
    fn c0_difference_matches_first_order_estimate() {
        // |c0_theta - c0_D| ~ |c0_D| (1 - 4 theta) h^2 |a| / 4 as the
        // perturbation goes to zero
        let (_, phys) = section3_phys();
        let theta = 1.0 / 12.0;
        let sd = sdtbc_parameters(2e-6, &phys).unwrap();
        let a_abs = hat_a(2e-6, &phys).unwrap().abs();
        let mut prev_gap = f64::INFINITY;
        for j in [800.0_f64, 1600.0, 3200.0, 6400.0] {
            let h = 1.5 / j;
            let dt = dtbc_parameters(theta, h, 2e-6, &phys).unwrap();
            let estimate = sd.c0.norm() * (1.0 - 4.0 * theta) * h * h * a_abs / 4.0;
            let ratio = (dt.c0 - sd.c0).norm() / estimate;
            let gap = (ratio - 1.0).abs();
            assert!(gap < prev_gap, "ratio {ratio} not approaching 1 at J={j}");
            prev_gap = gap;
        }
        assert!(prev_gap < 2e-3, "final gap {prev_gap}");
    }
}
